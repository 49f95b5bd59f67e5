"""Generates words.txt: sentences from a small fixed grammar."""
import sys
import random
r = random.Random(20190611)
det_s = ["the", "a", "this", "that", "every", "one"]
det_p = ["the", "these", "those", "some", "many", "two", "three", "few"]
adj = ["old", "young", "red", "small", "large", "quiet", "busy", "bright", "dark", "cold",
       "warm", "tall", "happy", "tired", "clever", "green", "new", "strange", "heavy", "early"]
noun = [("farmer","farmers"),("teacher","teachers"),("child","children"),("dog","dogs"),
        ("cat","cats"),("bird","birds"),("doctor","doctors"),("student","students"),
        ("merchant","merchants"),("sailor","sailors"),("river","rivers"),("horse","horses"),
        ("king","kings"),("girl","girls"),("boy","boys"),("woman","women"),("man","men"),
        ("baker","bakers"),("writer","writers"),("painter","painters")]
obj = [("apple","apples"),("book","books"),("letter","letters"),("house","houses"),
       ("song","songs"),("boat","boats"),("bread","breads"),("stone","stones"),
       ("story","stories"),("picture","pictures"),("coat","coats"),("key","keys"),
       ("cup","cups"),("flower","flowers"),("basket","baskets"),("map","maps")]
place = ["market", "garden", "village", "school", "harbor", "forest", "kitchen", "station",
         "library", "field", "castle", "bridge"]
tv = [("sees","see","saw"),("finds","find","found"),("sells","sell","sold"),
      ("buys","buy","bought"),("carries","carry","carried"),("paints","paint","painted"),
      ("reads","read","read"),("writes","write","wrote"),("loses","lose","lost"),
      ("keeps","keep","kept"),("brings","bring","brought"),("wants","want","wanted")]
iv = [("sleeps","sleep","slept"),("runs","run","ran"),("sings","sing","sang"),
      ("waits","wait","waited"),("works","work","worked"),("laughs","laugh","laughed"),
      ("walks","walk","walked"),("arrives","arrive","arrived")]
prep = ["at", "near", "in", "behind", "beside"]
adv = ["today", "again", "slowly", "quickly", "yesterday", "often", "quietly", "early"]
conj = ["and", "but", "because", "while"]

def np_(plural, pool):
    d = r.choice(det_p if plural else det_s)
    a = [r.choice(adj)] if r.random() < 0.45 else []
    if a and r.random() < 0.2: a.append(r.choice(adj))
    n = r.choice(pool)[1 if plural else 0]
    if d == "a" and a == [] and n[0] in "aeiou": d = "the"
    if d == "a" and a and a[0][0] in "aeiou": d = "the"
    return [d] + a + [n]

def clause():
    plural = r.random() < 0.4
    past = r.random() < 0.35
    subj = np_(plural, noun)
    if r.random() < 0.6:
        v = r.choice(tv)
        verb = v[2] if past else (v[1] if plural else v[0])
        out = subj + [verb] + np_(r.random() < 0.4, obj)
    else:
        v = r.choice(iv)
        verb = v[2] if past else (v[1] if plural else v[0])
        out = subj + [verb]
    if r.random() < 0.5:
        out += [r.choice(prep), "the", r.choice(place)]
    if r.random() < 0.25:
        out += [r.choice(adv)]
    return out

lines = []
for _ in range(2400):
    s = clause()
    if r.random() < 0.3:
        s += [r.choice(conj)] + clause()
    lines.append(" ".join(s + ["."]))
open(sys.argv[1] if len(sys.argv) > 1 else "words.txt", "w").write("\n".join(lines) + "\n")
