"""Bundled word lists, versioned so downstream outputs stay reproducible.

Editing these lists changes keyword and target outputs; bump the version
when you do.
"""

WORDLIST_VERSION = "2026.1"

# Classic English stopword inventory (function words, auxiliaries, quantity
# words, and a handful of news boilerplate terms).
STOPWORDS = frozenset("""
a about above after again against all also am an and any are aren arent as at
be because been before being below between both but by can cannot cant could
couldnt did didnt do does doesnt doing dont down during each few for from
further had hadnt has hasnt have havent having he hed hell her here heres hers
herself hes him himself his how hows i id if ill im in into is isnt it its
itself ive just let lets me more most mustnt my myself no nor not of off on
once only or other ought our ours ourselves out over own same said say says
shant she shed shell shes should shouldnt since so some such than that thats
the their theirs them themselves then there theres these they theyd theyll
theyre theyve this those through to too under until up upon us very was wasnt
we wed well were werent weve what whats when whens where wheres whether which
while who whom whos why whys will with wont would wouldnt you youd youll your
youre yours yourself yourselves
according across also among amid mr mrs ms told new news reuters ap
""".split())

# Common given names, used to keep person first names out of the stance
# target inventory.
FIRST_NAMES = frozenset("""
aaron adam alan albert alex alexander alexis alice amanda amber amy andrea
andrew angela ann anna anthony april arthur ashley austin barbara benjamin
beth betty beverly billy bobby bonnie bradley brandon brenda brian brittany
bruce bryan carl carol caroline carolyn catherine chad charles charlotte
cheryl chris christian christina christine christopher cindy clarence craig
crystal cynthia dale dan daniel danielle danny david dawn deborah debra denise
dennis diana diane donald donna doris dorothy douglas dylan earl edward elaine
elizabeth emily emma eric erin ernest ethan eugene evelyn frances frank fred
gabriel gary george gerald gloria grace gregory hannah harold harry heather
helen henry howard jack jacob jacqueline james jamie jane janet janice jason
jean jeffrey jennifer jeremy jerry jesse jessica jill jim joan joe john johnny
jonathan jordan jose joseph joshua joyce juan judith judy julia julie justin
karen katherine kathleen kathryn kathy keith kelly kenneth kevin kimberly kyle
larry laura lauren lawrence linda lisa logan lori louis louise madison
margaret maria marie marilyn mark martha martin mary mason matthew megan
melissa michael michelle mildred nancy natalie nathan nicholas nicole noah
norma olivia pamela patricia patrick paul peter philip phillip phyllis rachel
ralph randy raymond rebecca richard robert robin roger ronald rose roy russell
ruth ryan samantha samuel sandra sara sarah scott sean sharon shirley sophia
stephanie stephen steve steven susan tammy teresa terry theresa thomas
timothy tina todd tyler victoria vincent virginia walter wayne wendy william
willie zachary
""".split())
